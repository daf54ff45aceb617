"""Exact computations in group rings and Novikov rings: contraction
certificates for membership in homological finiteness invariants, division
closure rebuilds, approximate Ore solving over finite traced algebras, and
L2-Betti estimates."""

__version__ = "0.1.0"

from .groups import (Character, DirectProduct, FreeAbelian, FreeByZ,
                     FreeGroup, GroupSpec, enumerate_support, multiply,
                     phi_value, spec_from_json)
from .gring import GroupRingElement
from .novikov import (NovikovExpr, NovikovMatrix, invert_I_minus_P,
                      invert_over_division_closure, min_degree_bound, truncate)
from .complexes import (ChainComplex, euler_characteristic,
                        presentation_complex, product_complex)
from .contraction import (ContractionCertificate, KernelWitnessReport,
                          kernel_witness, novikov_contraction_from_certificate,
                          rebuild_all, rebuild_contraction, search_contraction,
                          verify_certificate)
from .ore import (FiniteTracedAlgebra, TwistedPoly, approx_ore,
                  build_lambda_k, common_multiple, twisted_multiply)
from .l2 import FiniteQuotient, L2Report, betti_by_euler_rule, betti_by_quotients
from .campaign import (CosetTable, SigmaCampaign, default_characters,
                       finite_index_transfer_check, run_campaign)
from .fixtures import fixture_names, load_fixture
