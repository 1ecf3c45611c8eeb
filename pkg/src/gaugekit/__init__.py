"""gaugekit: gauge kernels, energy partitions, and causal field evolution on a lattice."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    GaugekitError,
    NonNeutralSource,
    NonTransverseInput,
    PoincareZeroModePresent,
    UnstableTimestep,
    WrapAroundWindowExceeded,
)
from .lattice import (
    Ball,
    Grid,
    ScalarField,
    VectorField,
    curl,
    div,
    grad,
    helmholtz_decompose,
    inner,
    l2_norm,
    longitudinal_part,
    region_integral,
    set_fft_workers,
    solve_poisson,
    spectral_power,
    transverse_part,
    transversality_residual,
    volume_integral,
)
from .fieldio import read_field, write_field
from .kernels import (
    ChargeEnsemble,
    CoulombKernel,
    CustomKernel,
    GaugeKernel,
    PoincareKernel,
    assemble_vector_potential,
    chi_functional,
    make_kernel,
    polarization,
    residual_gauge_shift,
    validate_adjoint,
)
from .energy import (
    EnergyPartition,
    ModeSet,
    canonical_partition,
    coulomb_potential,
    free_field_energy,
    mode_amplitudes,
    reconstruct_fields,
    scalar_potential,
)
from .sources import SourceBlob, SourceModel
from .dynamics import (
    Evolver,
    FermiConfig,
    FermiResult,
    SimState,
    init_state,
    run_fermi,
    stability_dt,
    standard_fermi_config,
    step,
)
from .retarded import RetardedQuery, retarded_B, retarded_E
