from .domains import DomainDescriptor
from .errors import BergmanError, ConfigError, DomainError
from .kernels import KernelModel
from .parameters import DEFAULT_TOLERANCES, GramParams, GridParams, OutputParams, Tolerances
from .points import PolarizedPoint, parse_complex, parse_vector
from .representative import exph, rep_coordinates, rep_map
from .connection import integrate_geodesic
from .verify import run_verify_suite
