from .forward import (
    attention_pool,
    attention_weights,
    behavior_representation,
    embed_feature,
    individual_representation,
    interaction_representation,
    loss,
    predict,
)
from .params import (
    FeatureScaler,
    ModelParameters,
    Variant,
    init_params,
    is_weight,
    load_checkpoint,
    param_shapes,
    save_checkpoint,
)
from .tape_model import loss_on_tape, tape_loss_and_grad

__all__ = [
    "FeatureScaler",
    "ModelParameters",
    "Variant",
    "attention_pool",
    "attention_weights",
    "behavior_representation",
    "embed_feature",
    "individual_representation",
    "init_params",
    "interaction_representation",
    "is_weight",
    "load_checkpoint",
    "loss",
    "loss_on_tape",
    "param_shapes",
    "predict",
    "save_checkpoint",
    "tape_loss_and_grad",
]
