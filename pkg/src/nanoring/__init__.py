"""Collective radiation and excitation transport in dipole-coupled nanorings.

Arrays of two-level emitters spaced below the transition wavelength
interact through the free-space dipole propagator; this package builds
such layouts (single rings, ring pairs, multi-ring complexes), assembles
their dispersive and dissipative coupling matrices, diagonalizes the
resulting non-Hermitian Hamiltonian in the one- and two-excitation
manifolds, evolves pure states, and samples the emitted field.

Units: lengths in the transition wavelength lambda0, rates and energies
in the single-emitter linewidth gamma0, times in 1/gamma0.
"""

from .errors import (
    ConfigError,
    GeometryError,
    InvalidSpecError,
    NanoringError,
    NumericalError,
    SingularityError,
)
from .geometry import (
    DipoleArray,
    PolSpec,
    RingFrame,
    RingSpec,
    apply_disorder,
    build_ring,
    layout_to_json,
    lhc_layout,
    save_layout,
    two_ring_layout,
)
from .coupling import (
    CouplingMatrices,
    coupling_rates,
    greens_tensor,
    short_range_omega,
)
from .spectrum import (
    AngleSweep,
    ModeSet,
    ScalingFit,
    ScalingResult,
    analytic_ring_spectrum,
    angle_sweep,
    diagonalize,
    effective_hamiltonian,
    exciton_momentum,
    label_modes,
    magic_angle,
    min_decay_scan,
    minimal_rate,
    pair_basis,
    ring_mode_numbers,
    spin_wave,
)
from .dynamics import (
    DecayCurve,
    StateVector,
    default_decay_times,
    disorder_decay_study,
    evolve,
    farthest_site,
    gaussian_wavepacket,
    mode_state,
    ring_population,
    ring_population_trace,
    site_basis_state,
    transfer_fidelity,
    transfer_population,
)
from .transport import (
    ModeCouplingTable,
    coupling_efficiency,
    efficiency_sweep,
    mode_coupling,
    mode_coupling_table,
)
from .field import (
    FieldMap,
    emitted_field,
    emitted_field_many,
    farfield_map,
    plane_map,
    sphere_grid,
    superposition_state,
)

__version__ = "0.1.0"
