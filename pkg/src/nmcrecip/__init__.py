"""Nice Markov counting processes: simulation, bridges, reciprocal invariants,
Girsanov densities and Monte Carlo tests of duality formulas."""

__version__ = "0.1.0"

from .core import *  # noqa: E402,F401,F403
from .core import __all__ as _core_all  # noqa: E402
from .intensity import (  # noqa: E402
    InvariantGrid,
    eval_intensity,
    eval_time_log_derivative,
    invariant_grid,
    reciprocal_invariant,
    same_reciprocal_class,
)
from .measure import (  # noqa: E402
    DensityValue,
    HTransformField,
    density_vs_std_poisson,
    girsanov_density,
    girsanov_log_density,
    htransform_intensity_field,
)
from .sampling import *  # noqa: E402,F401,F403
from .sampling import __all__ as _sampling_all  # noqa: E402
from .variational import *  # noqa: E402,F401,F403
from .variational import __all__ as _variational_all  # noqa: E402

__all__ = [
    "__version__",
    *_core_all,
    "InvariantGrid",
    "eval_intensity",
    "eval_time_log_derivative",
    "invariant_grid",
    "reciprocal_invariant",
    "same_reciprocal_class",
    "DensityValue",
    "HTransformField",
    "density_vs_std_poisson",
    "girsanov_density",
    "girsanov_log_density",
    "htransform_intensity_field",
    *_sampling_all,
    *_variational_all,
]
