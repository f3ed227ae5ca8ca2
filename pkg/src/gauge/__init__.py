# Special defining functions and normal forms of Poincare-Einstein metrics
