# Renormalized volume, log coefficient and volume anomaly
