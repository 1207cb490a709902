from __future__ import annotations

from dataclasses import asdict, dataclass

SURVIVAL = "survival"
BINARY = "binary"


class ModelConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Hyper-parameters of the recurrent hazard model.

    ``history_length=None`` feeds the full covariate history to the encoder;
    an integer ``u`` restricts each interval's hazard to the last ``u``
    covariate rows.  ``heads=2`` builds separate control (head 0) and treated
    (head 1) output layers on a shared encoder.
    """

    hidden_size: int = 32
    history_length: int | None = None
    heads: int = 1
    variant: str = SURVIVAL
    alpha_likelihood: float = 1.0
    beta_rank: float = 0.1
    gamma_calibration: float = 0.0
    rank_sigma: float = 0.1
    dropout_p: float = 0.1
    mc_samples: int = 50
    learning_rate: float = 1e-2
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.variant not in (SURVIVAL, BINARY):
            raise ModelConfigError(f"variant must be {SURVIVAL!r} or {BINARY!r}, got {self.variant!r}")
        if self.heads not in (1, 2):
            raise ModelConfigError(f"heads must be 1 or 2, got {self.heads}")
        if self.hidden_size < 1:
            raise ModelConfigError("hidden_size must be >= 1")
        if self.history_length is not None and self.history_length < 1:
            raise ModelConfigError("history_length must be >= 1 or None")
        if min(self.alpha_likelihood, self.beta_rank, self.gamma_calibration) < 0:
            raise ModelConfigError("loss weights must be non-negative")
        if self.variant == SURVIVAL and self.alpha_likelihood == 0 and self.beta_rank == 0:
            raise ModelConfigError("survival variant needs alpha_likelihood or beta_rank > 0")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ModelConfigError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if self.rank_sigma <= 0:
            raise ModelConfigError("rank_sigma must be positive")
        if self.mc_samples < 1 or self.epochs < 0 or self.batch_size < 1:
            raise ModelConfigError("mc_samples and batch_size must be >= 1, epochs >= 0")

    def to_dict(self) -> dict:
        return asdict(self)
