"""AV-Transformer, the assembled detector, its objective and training loop."""

from av_identity_guard.avformer.detector import DetectorModel, DetectorOutput, build_model, check_geometry
from av_identity_guard.avformer.losses import LossWeights, loss_terms, total_loss
from av_identity_guard.avformer.model import AvFormer, TokenType, TransformerBlock
from av_identity_guard.avformer.training import TrainResult, make_batch, train
