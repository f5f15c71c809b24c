from .analyzers import ANALYZERS, FooteFmc2dParams, analyze, foote_fmc2d_analyze, make_params
from .cnmf import CnmfParams, cnmf_analyze, convex_nmf
from .fmc2d import fmc2d_labels
from .foote import FooteParams, foote_boundaries, foote_boundary_frames, novelty_curve
from .gridsearch import grid_search
from .scluster import SclusterParams, scluster_analyze, scluster_labels
from .ssm import Ssm, build_ssm
