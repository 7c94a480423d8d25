"""Exception types shared by all packages and the exit codes the CLI maps them to."""


class ReidAdaptException(Exception):
    """Base class for every expected failure of the adaptation pipeline."""

    exit_code = 1


class ValidationError(ReidAdaptException):
    """Invalid input, parameter or configuration."""

    exit_code = 2


class NumericalError(ReidAdaptException):
    """Non-finite values where finite values are required."""

    exit_code = 2


class TrainingDivergedError(ReidAdaptException):
    """A training loss became non-finite; epoch counts from 1."""

    exit_code = 3

    def __init__(self, stage: str, epoch: int, loss: float):
        super().__init__(f"{stage} diverged in epoch {epoch} (loss={loss})")
        self.stage = stage
        self.epoch = epoch
        self.loss = loss


class StaleCheckpointError(ReidAdaptException):
    """A stored stage artifact was produced with a different configuration."""

    exit_code = 4

    def __init__(self, stage: str, stored_hash: str, expected_hash: str):
        super().__init__(
            f"Stage {stage} has a checkpoint for config {stored_hash[:12]}, expected {expected_hash[:12]}. "
            "Rerun with --force to recompute it."
        )
        self.stage = stage


class PipelineStageError(ReidAdaptException):
    """A pipeline stage failed; keeps the exit code of the underlying error."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"Stage {stage} failed: {cause}")
        self.stage = stage
        self.exit_code = getattr(cause, "exit_code", 1)
