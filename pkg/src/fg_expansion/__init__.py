# Fefferman-Graham expansion of the radial metric family
