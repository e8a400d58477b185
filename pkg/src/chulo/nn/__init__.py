from .model import (
    Batch,
    Forward,
    ModelConfig,
    ModelState,
    batch_loss,
    collect_gradients,
    forward_chunk_encoder,
    forward_doc_head,
    forward_token_decoder,
    init_state,
    make_batch,
)
from .optim import TrainConfig, adamw_step, schedule_multiplier
from .gradcheck import GradCheckReport, backward_and_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Batch",
    "Forward",
    "GradCheckReport",
    "ModelConfig",
    "ModelState",
    "TrainConfig",
    "adamw_step",
    "backward_and_check",
    "batch_loss",
    "collect_gradients",
    "forward_chunk_encoder",
    "forward_doc_head",
    "forward_token_decoder",
    "init_state",
    "load_checkpoint",
    "make_batch",
    "save_checkpoint",
    "schedule_multiplier",
]
