# Minimal submanifolds of the hyperbolic normal form and their renormalized areas.
