//! NHWC tensors, the layer set of the incident classifier with hand-written backward
//! passes, Adam, the training loop and the checkpoint format.

pub mod activation;
pub mod adam;
pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod gemm;
pub mod model;
pub mod pool;
pub mod tensor;
pub mod train;

pub use activation::{cross_entropy, relu, relu_backward, softmax, softmax_cross_entropy, PROB_FLOOR};
pub use adam::{Adam, AdamConfig};
pub use batchnorm::{
    batchnorm_backward, batchnorm_forward, batchnorm_infer, batchnorm_train, BatchNormCache,
    BatchNormGrads, BatchNormParams, Mode, BN_EPS, BN_MOMENTUM,
};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use conv::{conv2d_backward, conv2d_forward, ConvGrads};
pub use dense::{dense_backward, dense_forward, DenseGrads};
pub use model::{Activation, LayerSpec, Model, ModelSpec, ParamRef};
pub use pool::{maxpool_backward, maxpool_forward, pooled_extent, Pooled};
pub use tensor::Tensor;
pub use train::{evaluate, predict, train, EpochRecord, Evaluation, Samples, TrainConfig, TrainHistory};
