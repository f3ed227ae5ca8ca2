# Boundary metric families, curvature and quadrature
