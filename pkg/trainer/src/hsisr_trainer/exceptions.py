"""Trainer error taxonomy, mirroring the pipeline's exit-code split."""


class TrainerError(Exception):
    """Base class for all trainer failures."""


class ValidationError(TrainerError):
    """Bad inputs: files, shapes, config values, manifest mismatches."""


class NumericalError(TrainerError):
    """Failures of the computation itself, e.g. non-finite outputs."""
