"""Orbit-matching pseudometrics on concrete dynamical systems."""
__version__ = "0.1.0"

from .assignment import Matching, brute_force, solve_exact, solve_greedy  # noqa: E402
from .banach import (IndexSet, LimitEstimate, WindowSchedule, densities, estimate_bf,  # noqa: E402
                     estimate_f, uniform_time_average)
from .orbitcost import Window, window_cost  # noqa: E402
from .spaces import (Circle, FullShift, Product, ProductPoint, Rotation, Word,  # noqa: E402
                     periodic_word)

__all__ = ["Matching", "brute_force", "solve_exact", "solve_greedy", "IndexSet", "LimitEstimate",
           "WindowSchedule", "densities", "estimate_bf", "estimate_f", "uniform_time_average",
           "Window", "window_cost", "Circle", "FullShift", "Product", "ProductPoint", "Rotation",
           "Word", "periodic_word"]
