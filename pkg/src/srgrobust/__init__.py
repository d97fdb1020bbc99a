"""Feedback-robustness analysis via scaled relative graphs and
Davis-Wielandt shells: region algebra, shell sampling, matrix robust
nonsingularity checks, LTI robust stability checks, and the angle-gain
robustness profile computed by LMI bisection."""

from .dwshell import (
    ComplexMatrix,
    DwPoint,
    DwPointCloud,
    dw_sample,
    dw_support,
    dw_union_region,
    f_inv,
    inv_srg_theta_sample,
    project_theta,
    srg_theta_sample,
    theta_angle,
    theta_angle_interval,
)
from .geometry import (
    AnnulusSector,
    Complement,
    Cone,
    Disc,
    HalfPlane,
    Intersection,
    PointSet,
    Region,
    Sector,
    Union,
    circle_angles,
    circular_hull,
    forbidden_region,
    is_theta_circularly_connected,
    is_theta_symmetric,
    region_from_json,
    star_hull,
    symmetrize,
    theta_conjugate,
)
from .lmi import (
    LmiCertificate,
    MiWorkspace,
    SolverFailure,
    ThetaBlock,
    c_range_for_phi,
    max_lambda_mixed,
    mi_feasible,
    min_r_disc,
    min_r_gain,
    realify,
    theta_d,
)
from .lti import (
    FrequencyGrid,
    RsVerdict,
    StateSpaceSystem,
    freq_response,
    hinf_norm,
    hinf_theta_angle,
    rs_check_general,
    rs_check_named,
    rs_check_theta,
)
from .mrn import (
    MrnVerdict,
    UncertaintySpec,
    mrn_bruteforce,
    mrn_check_general,
    mrn_check_named,
    mrn_check_theta,
    witness_construct,
)
from .profile import (
    ProfilePoint,
    ThetaProfile,
    complementary_profile,
    compute_profile,
    export_profile,
    import_profile,
    refine_brackets,
)

__version__ = "0.1.0"
