"""Exception hierarchy shared by all engines."""


class TailAtlasError(Exception):
    """Base class; ``str()`` is prefixed with the module that raised it.

    The origin is read from the traceback once the error has been raised;
    before that the class default is used.
    """

    module = "tailatlas"

    @property
    def origin(self) -> str:
        tb, name = self.__traceback__, None
        while tb is not None:
            mod = tb.tb_frame.f_globals.get("__name__", "")
            if mod.startswith("tailatlas."):
                name = mod.split(".")[1]
            tb = tb.tb_next
        return name or self.module

    def __str__(self):
        return f"[{self.origin}] {super().__str__()}"


class ValidationError(TailAtlasError, ValueError):
    module = "symbolic_base"


class SingularPointError(TailAtlasError, ValueError):
    """A base point sits on a branch endpoint (a null set)."""

    module = "symbolic_base"


class HypothesisError(TailAtlasError):
    """An operation was called outside the hypotheses it is valid under."""

    module = "fiber_extension"


class WindowUnderflowError(TailAtlasError):
    module = "fiber_extension"


class InconclusiveWindowError(TailAtlasError):
    module = "decomposition"


class UnsupportedClassificationError(TailAtlasError):
    module = "decomposition"


class ExactnessCertificationError(TailAtlasError):
    module = "decomposition"


class SlowMixingError(TailAtlasError):
    module = "decomposition"


class NotBMeasurableError(TailAtlasError):
    module = "k_quotient"


class HorizonEscapeError(TailAtlasError):
    module = "lorentz_gas"


class SingularTrajectoryError(TailAtlasError):
    """Tangent or grazing collision; the trajectory lies in the singular set."""

    module = "lorentz_gas"


class ConfigError(TailAtlasError, ValueError):
    """Schema violations; ``violations`` holds ``(json_path, message)`` pairs."""

    module = "cli_io"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.violations))
