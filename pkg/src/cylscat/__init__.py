"""Multichannel scattering laboratory for waveguides with cylindrical ends.

Computes transverse spectra and channel structure, the S-matrix by
coupled-channel marching and by the stationary resolvent formula,
limiting-absorption and commutator-positivity diagnostics, sojourn times,
and the symmetrized time delay against its spectral energy-derivative form.
"""

__version__ = "0.1.0"

from .cross_section import (ComponentSpec, CrossSectionSpec, TransverseSpectrum,
                            circle, merge_thresholds, periodic_interval,
                            ring_graph, transverse_spectrum)
from .scenario import (Discretization, JunctionCore, PerturbationBlock,
                       Scenario, apply_J, apply_J_star, barrier, constant_block,
                       cutoff_j, gaussian_well, power_tail, sample_table,
                       validate_decay)
from .channels import (AxialGrid, ChannelSet, Dispersion, FiberVector,
                       WavePacket, apply_F0, free_evolve, incoming_projection,
                       inverse_F0, open_channels, outgoing_projection,
                       synthesize_from_fiber, time_operator_expectation)
from .hamiltonian import (CriticalSet, DiscreteOperator, MourreReport,
                          ResolventProbe, assemble_free, assemble_full,
                          commutator_form, conjugate_operator, defect_operator,
                          detect_eigenvalues, mourre_compression,
                          weighted_resolvent_probe)
from .scattering import (SMatrix, smatrix_ode, smatrix_stationary,
                         solve_coupled_channel, unitarity_defect)
from .timedelay import (TimeDelayReport, build_incoming_state, propagate_full,
                        scattering_state, sojourn_free, sojourn_full,
                        symmetrized_time_delay)
from .config import build_scenario, scenario_from_file
