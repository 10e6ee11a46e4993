"""Exception types raised across the package."""


class SeqtranError(Exception):
    """Base class; the CLI turns these into structured JSON errors."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class ValidationError(SeqtranError, ValueError):
    code = "invalid_input"


class ManifestError(ValidationError):
    """Problem with a manifest or one of the volumes it references."""

    code = "manifest"

    def __init__(self, message, task_id=None, sample_index=None):
        where = []
        if task_id is not None:
            where.append(f"task {task_id}")
        if sample_index is not None:
            where.append(f"sample {sample_index}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.task_id = task_id
        self.sample_index = sample_index

    def to_dict(self):
        d = super().to_dict()
        d["task_id"] = self.task_id
        d["sample_index"] = self.sample_index
        return d


class ConvergenceError(SeqtranError, RuntimeError):
    code = "no_convergence"

    def __init__(self, message, marginal_error):
        super().__init__(f"{message} (marginal error {marginal_error:.3e})")
        self.marginal_error = marginal_error


class PairError(SeqtranError):
    """A metric failed for a specific task pair."""

    code = "pair_metric"

    def __init__(self, pair, cause):
        super().__init__(f"{pair[0]} / {pair[1]}: {cause}")
        self.pair = tuple(pair)
        self.cause = cause


class IsolatedTargetError(SeqtranError):
    code = "isolated_target"


class NoPathError(SeqtranError):
    code = "no_sequential_path"
