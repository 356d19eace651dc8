"""Deterministic and stochastic metamorphosis for landmarks and images."""

from ._core import (
    InputError,
    NumericalError,
    __version__,
    landmark_hamiltonian,
    match_landmarks,
    run,
    sha256_hex,
    shoot_landmarks,
    verify_defaults,
)

__all__ = [
    "InputError",
    "NumericalError",
    "__version__",
    "landmark_hamiltonian",
    "match_landmarks",
    "run",
    "sha256_hex",
    "shoot_landmarks",
    "verify_defaults",
]
