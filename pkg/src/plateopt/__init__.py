"""Eigenvalues and bang-bang optimisation of inhomogeneous hinged plates."""

from .errors import GridMismatch, InvalidArgument, NumericFailure
from .grid import (
    CartesianGrid,
    GridFunction,
    RadialGrid,
    apply_laplacian,
    build_cartesian_grid,
    build_radial_grid,
    integrate,
    norm,
    read_csv,
    solve_poisson,
    write_csv,
)
from .kernels import IMPLEMENTATION
from .optim import (
    OptimizationTrace,
    OptimizerConfig,
    SwitchField,
    fd_check,
    optimize,
    step_density,
    step_thickness,
    switch_lambda,
    switch_mu,
)
from .rearrange import bathtub, majorizes, schwarz, talenti_check
from .spectral import (
    CoefficientField,
    DensityClass,
    EigenPair,
    ThicknessClass,
    eigen_lambda,
    eigen_Lambda,
    eigen_mu,
    jminus,
    rayleigh_lambda,
    rayleigh_Lambda,
    rayleigh_mu,
)

__version__ = "0.1.0"
