from .compose import (ArticulatedBody, JointSpaceField, Translated, Union, articulated_eval,
                      articulated_grad_q, union_min)
from .io import field_from_dict, field_to_dict, load_field, save_field
from .learned import (BernsteinSdf, MlpSdf, SdfLossParts, SdfLossWeights, SdfTrainSet, bernstein_basis,
                      sample_train_set, sdf_loss, train_bernstein_sdf, train_mlp_sdf)
from .primitives import Arc, Box, Capsule, Circle, HalfPlane, SdfField, Triangle, fd_gradient

__all__ = [
    "Arc", "ArticulatedBody", "BernsteinSdf", "Box", "Capsule", "Circle", "HalfPlane", "JointSpaceField",
    "MlpSdf", "SdfField", "SdfLossParts", "SdfLossWeights", "SdfTrainSet", "Translated", "Triangle", "Union",
    "articulated_eval", "articulated_grad_q", "bernstein_basis", "fd_gradient", "field_from_dict",
    "field_to_dict", "load_field", "sample_train_set", "save_field", "sdf_loss", "train_bernstein_sdf",
    "train_mlp_sdf", "union_min",
]
