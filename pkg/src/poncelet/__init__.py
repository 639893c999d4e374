"""Poncelet polygons and the Poncelet grid from billiards in an ellipse.

Modules:

- ``conics``      confocal family, elliptic coordinates, duality, Ivory map
- ``linespace``   oriented lines, the billiard map and its invariants
- ``canonical``   shift coordinate on a caustic, rotation numbers, closure,
                  string construction
- ``grid``        Poncelet polygons, P/Q grid sets, conic fits, equivalences
- ``projective``  projective maps, normalization of nested pairs, porism
- ``cli``         command-line front end
"""
from .conics import ConfocalConic, ConfocalFamily, GeneralConic, Point2
from .errors import PonceletError
from .linespace import OrientedLine

__version__ = "0.1.0"

__all__ = [
    "ConfocalConic",
    "ConfocalFamily",
    "GeneralConic",
    "OrientedLine",
    "Point2",
    "PonceletError",
    "__version__",
]
