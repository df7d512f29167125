"""Environment-driven defaults for the solver packages."""

import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Dense conversions (oracle, RPCG factors, ADI blocks) refuse beyond this size
DENSE_CAP = int(os.getenv("BAGMRES_DENSE_CAP", "2000"))

# Outer solve protocol: full GMRES, 300 iterations, relative residual 1e-6
DEFAULT_TOL = float(os.getenv("BAGMRES_TOL", "1e-6"))
DEFAULT_MAXIT = int(os.getenv("BAGMRES_MAXIT", "300"))

# Inner-depth rule: l_k = min(l_max, smallest l with ||v - A z_l|| <= eta ||v||)
DEFAULT_INNER_MAX = int(os.getenv("BAGMRES_INNER_MAX", "50"))
DEFAULT_ETA = float(os.getenv("BAGMRES_ETA", "0.5"))

DEFAULT_ADI_ALPHA = float(os.getenv("BAGMRES_ADI_ALPHA", "1.0"))

LOG_LEVEL = os.getenv("BAGMRES_LOG_LEVEL", "WARNING")
