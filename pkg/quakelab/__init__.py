# Quakelab: hyperbolic surfaces, earthquakes and de Sitter duality
__version__ = "0.1.0"
