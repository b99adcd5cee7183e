"""
koopholo - geometric phases of classical dynamics on tori, computed as
holonomies of the Stiefel connection in the Koopman representation
"""

__version__ = "0.2.0"

# Mode space and operators
from .modes import KetVector, Ray, inner, normalize, to_ray, fubini_study_distance
from .koopman import TorusTranslation, ToralAutomorphism, ComposedOperator, unitarity_defect

# Holonomy engine
from .holonomy import (
    RayLoop,
    CurveLoop,
    HolonomyResult,
    pancharatnam_phase,
    parallel_transport_phase,
    holonomy_at,
    two_mode_circle,
)

# Moving frames and the pullback (Hannay) phase
from .frames import Frame, FrameExcursion, excursion_net_state, extract_geometric_phase, cyclic_evolution_phase
from .hannay import ParamLoop, EigenFamily, hannay_phase, coherent_ring_family

# Scenario runner
from .models import Tolerances, DEFAULT_TOLERANCES
from .scenario import Scenario, Report, parse_scenario, serialize_scenario
from .runner import ScenarioRunner, run, emit_convergence_table

# Export CLI entry point
from .cli import main as cli_main
