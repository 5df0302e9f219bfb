"""Central tolerance table.

All exact-identity checks in the geometry kernel use EXACT_TOL; renormalization
of quadric points is tighter.  Solver and mesh tolerances live here too so that
no module hard-codes its own numbers.
"""

# geometry kernel
QUADRIC_RENORM_TOL = 1e-12   # |<v,v>+1| after renormalization
EXACT_TOL = 1e-10            # closed-form identities (isometry, duality, geodesics)
CAUSAL_CLASS_TOL = 1e-10     # deciding timelike/null/spacelike of a normalized vector
ORTHO_TOL = 1e-8             # <p,v>=0 precondition of the geodesic exponential
PLANE_LAND_TOL = 1e-8        # landing on the reference plane after a ruling isometry

# boundary curves
ACHRONAL_TOL = 1e-9          # slack in |dtau| <= |dtheta| for sampled curves

# convex hull / width
VERTICAL_FACET_TOL = 1e-6    # |time component of facet normal| below this -> vertical
HULL_FACET_TOL = 1e-9        # convexity slack for vertex-in-facet checks
WIDTH_CLAMP = 1e-3           # reported width is clamped to pi/2, raw value kept

# discrete surfaces
SPACELIKE_MARGIN = 1e-3      # default certified margin eps of a spacelike graph
MARGIN_FLOOR = 1e-7          # graphs below this margin are rejected outright
BOUNDARY_MASK_RINGS = 2      # curvature diagnostics masked this close to the rim
DEGENERATE_DETB_TOL = 1e-6   # |det B + 1| below this -> mu_l/mu_r degenerate
CHI_MASK_TOL = 1e-8          # |det B| below this -> chi is masked (flat spot)

# solvers
MEAN_CURV_TOL = 1e-6         # terminal max-norm of H ("tol_H")
STEP_UNDERFLOW = 1e-12       # flow step size below this aborts
HULL_CONTAIN_MARGIN = -1e-3  # iterates must stay inside the hull within this margin
