from quakelab.services import ds_duality, earthquake, laminations, moebius_core, surface_holonomy, teich_solvers

__all__ = ["ds_duality", "earthquake", "laminations", "moebius_core", "surface_holonomy", "teich_solvers"]
