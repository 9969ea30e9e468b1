"""Norms and simulators for quantum query complexity at desk scale.

The package computes the Schur-product style factorization norms (plain,
filtered, and dual), the general adversary bound with primal and dual
certificates, bounded-error query distances, composition and direct-sum
bounds, and builds/simulates the two-reflection state-conversion algorithm
from filtered-norm certificates.
"""

from .linalg import (HermitianEig, NotPsdError, complement_basis,
                     complement_projector, hermitian_eig, kron, psd_factorize,
                     schur, spectral_norm)
from .sdp import Block, SdpError, SdpProgram, SdpResult, solve
from .norms import (CheckReport, Factorization, Gamma2Result,
                     PropertySuiteReport, check_factorization, filtered_gamma2,
                     gamma2, gamma2_star, property_suite)
from .adversary import (AdversaryWitness, AdvResult, CertificateError,
                        ConsistencyError, FunctionSpec, adv_pm, adv_pm_certify,
                        build_filters, output_gram, q_delta, q_delta_nc,
                        query_distance, sandwich_check, validate_gram)
from .conversion import (AlgorithmInstance, BoundViolation, MuNuSystem,
                         build_instance, build_mu_nu, canonical_states,
                         eigenphases, evaluation_instance,
                         fractional_query_certificate, ideal_phase_detect,
                         one_query_certificate, output_condition,
                         run_conversion, simulate, spectral_gap_check,
                         verify_claims)
from .composition import (ComposedSpec, balance_witness, check_upper, compose,
                          compose_witness, direct_sum_check)

__version__ = "0.1.0"
