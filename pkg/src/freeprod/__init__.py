"""Reduced free products of tracial algebras: exact arithmetic, two-norm
operator bounds, and certificates that elements are close to invertibles."""

from .algebra import (AlgebraError, IntegerGroupTable, StructureTable, TraceNotFaithfulError,
                      build_group_algebra, gram_schmidt_onb, matrix_algebra_onb, table_from_spec,
                      validate_table)
from .bounds import (RadiusCertificate, certified_radius, f2_word_bound, haagerup_bound,
                     haagerup_homogeneous_bound, opnorm_lower)
from .coeffs import EXACT, FLOAT, GaussRat
from .element import (Element, FreeProduct, en_product_closed_form, inner_product, multiply,
                      project_level, support_profile)
from .stable_rank import (AvitzourTriple, DistanceCertificate, build_conjugators,
                          distance_certificate, find_triple, verify_power_identity)

__version__ = "0.1.0"

__all__ = [
    "AlgebraError", "AvitzourTriple", "DistanceCertificate", "EXACT", "Element", "FLOAT",
    "FreeProduct", "GaussRat", "IntegerGroupTable", "RadiusCertificate", "StructureTable",
    "TraceNotFaithfulError", "build_conjugators", "build_group_algebra", "certified_radius",
    "distance_certificate", "en_product_closed_form", "f2_word_bound", "find_triple",
    "gram_schmidt_onb", "haagerup_bound", "haagerup_homogeneous_bound", "inner_product",
    "matrix_algebra_onb", "multiply", "opnorm_lower", "project_level", "support_profile",
    "table_from_spec", "validate_table", "verify_power_identity",
]
