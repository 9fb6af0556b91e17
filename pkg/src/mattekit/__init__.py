"""mattekit: attention-guided alpha matting toolkit.

Trimap generation via bbox-scaled morphology, a hand-rolled autodiff
operator set (grouped convolution, group norm, windowed softmax, guided
pooling/unpooling), a compact encoder-decoder matting network, matting
losses and metrics, a synthetic dataset generator and an Adam trainer.
"""
__version__ = "0.1.0"
