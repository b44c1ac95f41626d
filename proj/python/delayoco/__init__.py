"""Online convex optimization with delayed feedback."""

from ._core import (
    CheckFailure,
    ValidationError,
    fit_scaling,
    philox4x32,
    profile,
    project_ball,
    project_box,
    run_episode,
    sweep,
    verify,
    verify_identities,
)

__all__ = [
    "CheckFailure",
    "ValidationError",
    "fit_scaling",
    "philox4x32",
    "profile",
    "project_ball",
    "project_box",
    "run_episode",
    "sweep",
    "verify",
    "verify_identities",
]
