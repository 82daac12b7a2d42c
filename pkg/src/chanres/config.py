"""Global numerical settings.

Every tolerance used across the package lives here so that a run can be
reproduced from the metadata line written by the CLI.
"""

from dataclasses import dataclass, asdict


@dataclass
class Settings:
    # conic solver
    solver_tol: float = 1e-9
    accept_tol: float = 1e-7
    max_solver_iter: int = 400
    # validation of states and Choi matrices
    herm_tol: float = 1e-10
    psd_tol: float = 1e-9
    trace_tol: float = 1e-9
    kraus_tol: float = 1e-6
    # support detection for zero-error hypothesis testing
    rank_tol: float = 1e-9
    # size guards
    max_total_dim: int = 4096
    max_sdp_dim: int = 64
    # seesaw defaults
    seesaw_restarts: int = 20
    seesaw_max_iter: int = 200
    seesaw_tol: float = 1e-8
    # rates
    snap_tol: float = 1e-7
    n_search_cap: int = 64

    def as_dict(self):
        return asdict(self)


settings = Settings()
