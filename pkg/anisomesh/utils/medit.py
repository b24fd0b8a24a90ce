"""
MEDIT - ASCII mesh (.mesh) and solution (.sol) reader/writer.

Only the 2D subset is supported: Vertices, Triangles, optional Edges for
boundary tags, and SolAtVertices with scalar (type 1) or symmetric tensor
(type 3) values. Indices in files are 1-based.
"""

from pathlib import Path
from typing import Any, List, Optional, Tuple, Union

import numpy as np

from ..core.exceptions import ParseError, UnsupportedDimensionError
from ..core.mesh import TriMesh, build_mesh
from .logger import get_logger

logger = get_logger(__name__)

SOL_SCALAR = 1
SOL_TENSOR = 3


class _Tokens:
    """Whitespace tokens with their line numbers; '#' starts a comment."""

    def __init__(self, text: str) -> None:
        self.items: List[Tuple[str, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            for token in line.split("#", 1)[0].split():
                self.items.append((token, lineno))
        self.pos = 0

    @property
    def line(self) -> int:
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.items[-1][1] if self.items else 1

    def done(self) -> bool:
        return self.pos >= len(self.items)

    def next(self, what: str) -> str:
        if self.done():
            raise ParseError(self.line, f"unexpected end of file while reading {what}")
        token = self.items[self.pos][0]
        self.pos += 1
        return token

    def next_int(self, what: str) -> int:
        line = self.line
        token = self.next(what)
        try:
            return int(token)
        except ValueError:
            raise ParseError(line, f"expected integer {what}, found {token!r}")

    def next_float(self, what: str) -> float:
        line = self.line
        token = self.next(what)
        try:
            value = float(token)
        except ValueError:
            raise ParseError(line, f"expected number {what}, found {token!r}")
        if not np.isfinite(value):
            raise ParseError(line, f"non-finite {what}")
        return value

    def numbers_until_keyword(self) -> List[Tuple[str, int]]:
        """Consume tokens up to (not including) the next alphabetic keyword."""
        taken = []
        while not self.done() and not _is_keyword(self.items[self.pos][0]):
            taken.append(self.items[self.pos])
            self.pos += 1
        return taken


def _is_keyword(token: str) -> bool:
    return token[:1].isalpha()


def read_medit(text: str) -> TriMesh:
    """Parse MEDIT .mesh text into a validated TriMesh."""
    tokens = _Tokens(text)
    dimension: Optional[int] = None
    vertices: Optional[np.ndarray] = None
    triangles: Optional[np.ndarray] = None
    edges: Optional[List[Tuple[int, int, int]]] = None

    while not tokens.done():
        line = tokens.line
        keyword = tokens.next("section keyword")
        if keyword == "End":
            break
        if not _is_keyword(keyword):
            raise ParseError(line, f"expected a section keyword, found {keyword!r}")
        if keyword == "MeshVersionFormatted":
            tokens.next_int("format version")
        elif keyword == "Dimension":
            dimension = tokens.next_int("dimension")
            if dimension != 2:
                raise UnsupportedDimensionError(f"line {line}: only Dimension 2 is supported, found {dimension}")
        elif keyword == "Vertices":
            count = _count(tokens, "vertex count")
            vertices = np.empty((count, 2))
            for k in range(count):
                vertices[k, 0] = tokens.next_float("x coordinate")
                vertices[k, 1] = tokens.next_float("y coordinate")
                tokens.next_int("vertex reference")
        elif keyword == "Triangles":
            count = _count(tokens, "triangle count")
            triangles = np.empty((count, 3), dtype=np.int64)
            for k in range(count):
                line = tokens.line
                for j in range(3):
                    triangles[k, j] = tokens.next_int("triangle vertex index")
                tokens.next_int("triangle reference")
                _check_indices(triangles[k], vertices, line)
            triangles -= 1
        elif keyword == "Edges":
            count = _count(tokens, "edge count")
            edges = []
            for _ in range(count):
                line = tokens.line
                a = tokens.next_int("edge vertex index")
                b = tokens.next_int("edge vertex index")
                tag = tokens.next_int("edge reference")
                _check_indices(np.array([a, b]), vertices, line)
                edges.append((a - 1, b - 1, tag))
        else:
            skipped = tokens.numbers_until_keyword()
            logger.warning(f"Skipping unknown MEDIT section {keyword!r} at line {line} ({len(skipped)} tokens)")

    if vertices is None:
        raise ParseError(tokens.line, "missing Vertices section")
    if triangles is None:
        raise ParseError(tokens.line, "missing Triangles section")
    if dimension is None:
        logger.debug("MEDIT text has no Dimension keyword; assuming 2")
    return build_mesh(vertices, triangles, edges)


def write_medit(mesh: TriMesh) -> str:
    """Serialize a mesh to MEDIT text (17 significant digits)."""
    lines = ["MeshVersionFormatted 2", "", "Dimension 2", "", "Vertices", str(mesh.n_vertices)]
    for (x, y), flag in zip(mesh.vertices, mesh.vertex_flags):
        lines.append(f"{x:.17g} {y:.17g} {int(flag)}")
    lines += ["", "Triangles", str(mesh.n_triangles)]
    for a, b, c in mesh.triangles:
        lines.append(f"{a + 1} {b + 1} {c + 1} 0")
    lines += ["", "Edges", str(mesh.boundary_edges.shape[0])]
    for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        lines.append(f"{a + 1} {b + 1} {int(tag)}")
    lines += ["", "End"]
    return "\n".join(lines) + "\n"


def read_sol(text: str) -> np.ndarray:
    """Parse .sol text; returns shape (n,) for scalars or (n, 3) for tensors (a11 a12 a22)."""
    tokens = _Tokens(text)
    result: Optional[np.ndarray] = None
    while not tokens.done():
        line = tokens.line
        keyword = tokens.next("section keyword")
        if keyword == "End":
            break
        if keyword == "MeshVersionFormatted":
            tokens.next_int("format version")
        elif keyword == "Dimension":
            dimension = tokens.next_int("dimension")
            if dimension != 2:
                raise UnsupportedDimensionError(f"line {line}: only Dimension 2 is supported, found {dimension}")
        elif keyword == "SolAtVertices":
            result = _read_sol_block(tokens)
        elif _is_keyword(keyword):
            skipped = tokens.numbers_until_keyword()
            logger.warning(f"Skipping unknown .sol section {keyword!r} at line {line} ({len(skipped)} tokens)")
        else:
            raise ParseError(line, f"expected a section keyword, found {keyword!r}")
    if result is None:
        raise ParseError(tokens.line, "missing SolAtVertices section")
    return result


def _read_sol_block(tokens: _Tokens) -> np.ndarray:
    count = _count(tokens, "solution count")
    start = tokens.line
    body = tokens.numbers_until_keyword()
    head = [tok for tok, _ in body[:2]]
    # Either "1 <type>" (field count then type) or a bare "<type>"
    for header, code in ((["1", "3"], SOL_TENSOR), (["1", "1"], SOL_SCALAR), (["3"], SOL_TENSOR), (["1"], SOL_SCALAR)):
        width = 3 if code == SOL_TENSOR else 1
        if head[:len(header)] == header and len(body) == len(header) + count * width:
            values = []
            for token, line in body[len(header):]:
                try:
                    values.append(float(token))
                except ValueError:
                    raise ParseError(line, f"expected number in solution values, found {token!r}")
            array = np.array(values, dtype=float)
            if not np.all(np.isfinite(array)):
                raise ParseError(start, "non-finite solution value")
            return array.reshape(count, 3) if code == SOL_TENSOR else array
    raise ParseError(start, "SolAtVertices block must hold one scalar (type 1) or symmetric tensor (type 3) field")


def write_sol(values: Any) -> str:
    """Serialize nodal values: shape (n,) as scalars, shape (n, 3) as tensors."""
    array = np.asarray(values, dtype=float)
    if array.ndim == 1:
        code, rows = SOL_SCALAR, array.reshape(-1, 1)
    elif array.ndim == 2 and array.shape[1] == 3:
        code, rows = SOL_TENSOR, array
    else:
        raise ValueError(f"Cannot write values of shape {array.shape} as a .sol field")
    lines = ["MeshVersionFormatted 2", "", "Dimension 2", "", "SolAtVertices", str(rows.shape[0]), f"1 {code}"]
    for row in rows:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    lines += ["", "End"]
    return "\n".join(lines) + "\n"


def load_mesh(path: Union[str, Path]) -> TriMesh:
    return read_medit(Path(path).read_text())


def save_mesh(mesh: TriMesh, path: Union[str, Path]) -> None:
    Path(path).write_text(write_medit(mesh))


def load_sol(path: Union[str, Path]) -> np.ndarray:
    return read_sol(Path(path).read_text())


def save_sol(values: Any, path: Union[str, Path]) -> None:
    Path(path).write_text(write_sol(values))


def _count(tokens: _Tokens, what: str) -> int:
    line = tokens.line
    count = tokens.next_int(what)
    if count < 0:
        raise ParseError(line, f"negative {what}")
    return count


def _check_indices(indices: np.ndarray, vertices: Optional[np.ndarray], line: int) -> None:
    if vertices is None:
        raise ParseError(line, "connectivity given before the Vertices section")
    if np.any(indices < 1) or np.any(indices > vertices.shape[0]):
        raise ParseError(line, f"vertex index out of range 1..{vertices.shape[0]}")
