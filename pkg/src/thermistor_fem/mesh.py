"""Structured meshes of the unit square and their macroelement grouping.

The solver works on uniform partitions of ``(0, 1) x (0, 1)`` into ``M x M``
axis-aligned squares (``elem_kind="quad"``) or into ``2 M^2`` right triangles
obtained by cutting every square along its lower-right to upper-left diagonal
(``elem_kind="tri"``).  Nodes are the lattice points ``(i/M, j/M)`` numbered
lexicographically (row-major in ``y``, then ``x``), so node ``j*(M+1) + i``
sits at ``(i/M, j/M)``.

``M`` must be even so the fine mesh can be grouped into macroelements: blocks
of ``2 x 2`` fine squares (on which a biquadratic polynomial is anchored at
the nine block nodes) or blocks of four fine triangles forming one triangle
of the doubled mesh (anchored at its three vertices and three edge
midpoints).  The macroelement grouping is what the superconvergent
post-processing operator is built on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Mesh", "MacroBlock", "build_mesh", "macroelements", "dump_mesh"]


@dataclass(frozen=True)
class Mesh:
    """Immutable container for a structured mesh of the unit square.

    Attributes
    ----------
    nodes : (n_nodes, 2) float array
        Vertex coordinates, lexicographic ordering.
    elements : (n_elements, 4) or (n_elements, 3) int array
        Vertex indices of each element, counter-clockwise.
    elem_kind : str
        Either ``"quad"`` or ``"tri"``.
    M : int
        Number of cells per side (even, at least 2).
    boundary_nodes : int array
        Sorted indices of nodes on the boundary of the unit square.
    """

    nodes: np.ndarray
    elements: np.ndarray
    elem_kind: str
    M: int
    boundary_nodes: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def h(self) -> float:
        """Mesh size: the element diameter ``sqrt(2)/M``."""
        return np.sqrt(2.0) / self.M


@dataclass(frozen=True)
class MacroBlock:
    """One macroelement: a group of fine elements with interpolation anchors.

    Attributes
    ----------
    fine_elements : int array
        Indices of the fine mesh elements covered by the block (four for both
        element kinds).
    anchor_nodes : int array
        Fine mesh nodes used as interpolation anchors: the nine nodes of a
        ``2 x 2`` quad block (``Q2``), or the three vertices plus three edge
        midpoints of a doubled triangle (``P2``).
    poly : str
        Polynomial space of the block interpolant, ``"Q2"`` or ``"P2"``.
    """

    fine_elements: np.ndarray
    anchor_nodes: np.ndarray
    poly: str


def build_mesh(M: int, elem_kind: str = "quad") -> Mesh:
    """Build a uniform mesh of the unit square with ``M`` cells per side.

    Parameters
    ----------
    M : int
        Number of cells per side.  Must be an even integer >= 2 so the mesh
        supports macroelement grouping.
    elem_kind : str
        ``"quad"`` for bilinear squares, ``"tri"`` for linear triangles (each
        square is split along the diagonal from its lower-right corner to its
        upper-left corner).

    Returns
    -------
    Mesh
    """
    if not isinstance(M, (int, np.integer)):
        raise ValueError(f"M must be an integer, got {M!r}")
    if M < 2 or M % 2 != 0:
        raise ValueError(f"M must be an even integer >= 2, got {M}")
    if elem_kind not in ("quad", "tri"):
        raise ValueError(f"elem_kind must be 'quad' or 'tri', got {elem_kind!r}")

    side = np.linspace(0.0, 1.0, M + 1)
    X, Y = np.meshgrid(side, side, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    # Corner node indices of cell (i, j): lower-left, lower-right,
    # upper-right, upper-left.
    i, j = np.meshgrid(np.arange(M), np.arange(M), indexing="xy")
    i = i.ravel()
    j = j.ravel()
    bl = j * (M + 1) + i
    br = bl + 1
    tr = bl + (M + 1) + 1
    tl = bl + (M + 1)

    if elem_kind == "quad":
        elements = np.column_stack([bl, br, tr, tl])
    else:
        # Lower triangle (below the diagonal) first, then upper triangle.
        lower = np.column_stack([bl, br, tl])
        upper = np.column_stack([br, tr, tl])
        elements = np.empty((2 * M * M, 3), dtype=lower.dtype)
        elements[0::2] = lower
        elements[1::2] = upper

    ii = np.arange((M + 1) ** 2) % (M + 1)
    jj = np.arange((M + 1) ** 2) // (M + 1)
    on_boundary = (ii == 0) | (ii == M) | (jj == 0) | (jj == M)
    boundary_nodes = np.nonzero(on_boundary)[0]

    return Mesh(
        nodes=nodes,
        elements=elements,
        elem_kind=elem_kind,
        M=M,
        boundary_nodes=boundary_nodes,
    )


def _node(M: int, i, j):
    return j * (M + 1) + i


def macroelements(mesh: Mesh) -> list[MacroBlock]:
    """Group the fine mesh into macroelements for post-processing.

    For quads, each block is a ``2 x 2`` patch of fine squares and the anchors
    are its nine nodes (corners, edge midpoints, center), supporting a unique
    biquadratic interpolant.  For triangles, each block is one triangle of the
    doubled (``M/2``) mesh, made of four fine triangles, and the anchors are
    its three vertices and three edge midpoints, supporting a unique quadratic
    interpolant.

    Returns ``M^2/4`` blocks for quads and ``M^2/2`` blocks for triangles.

    Raises
    ------
    ValueError
        If the mesh does not have the structured layout of `build_mesh`.
    """
    M = mesh.M
    if M < 2 or M % 2 != 0:
        raise ValueError(f"macroelements need an even M >= 2, got M={M}")
    expected = M * M if mesh.elem_kind == "quad" else 2 * M * M
    if mesh.n_elements != expected or mesh.n_nodes != (M + 1) ** 2:
        raise ValueError("mesh does not match the structured layout of build_mesh")

    blocks = []
    if mesh.elem_kind == "quad":
        cell = lambda i, j: j * M + i  # noqa: E731
        for J in range(M // 2):
            for I in range(M // 2):
                i0, j0 = 2 * I, 2 * J
                fine = np.array(
                    [cell(i0, j0), cell(i0 + 1, j0), cell(i0, j0 + 1), cell(i0 + 1, j0 + 1)]
                )
                # Corners, then edge midpoints (bottom, right, top, left),
                # then the block center.
                anchors = np.array(
                    [
                        _node(M, i0, j0),
                        _node(M, i0 + 2, j0),
                        _node(M, i0 + 2, j0 + 2),
                        _node(M, i0, j0 + 2),
                        _node(M, i0 + 1, j0),
                        _node(M, i0 + 2, j0 + 1),
                        _node(M, i0 + 1, j0 + 2),
                        _node(M, i0, j0 + 1),
                        _node(M, i0 + 1, j0 + 1),
                    ]
                )
                blocks.append(MacroBlock(fine, anchors, "Q2"))
    else:
        lower_tri = lambda i, j: 2 * (j * M + i)  # noqa: E731
        upper_tri = lambda i, j: 2 * (j * M + i) + 1  # noqa: E731
        for J in range(M // 2):
            for I in range(M // 2):
                i0, j0 = 2 * I, 2 * J
                # Triangle of the doubled mesh below the block diagonal:
                # vertices (i0, j0), (i0+2, j0), (i0, j0+2).  Anchors are the
                # three vertices followed by the three edge midpoints.
                fine = np.array(
                    [
                        lower_tri(i0, j0),
                        upper_tri(i0, j0),
                        lower_tri(i0 + 1, j0),
                        lower_tri(i0, j0 + 1),
                    ]
                )
                anchors = np.array(
                    [
                        _node(M, i0, j0),
                        _node(M, i0 + 2, j0),
                        _node(M, i0, j0 + 2),
                        _node(M, i0 + 1, j0),
                        _node(M, i0 + 1, j0 + 1),
                        _node(M, i0, j0 + 1),
                    ]
                )
                blocks.append(MacroBlock(fine, anchors, "P2"))
                # Triangle above the diagonal: vertices (i0+2, j0),
                # (i0+2, j0+2), (i0, j0+2).
                fine = np.array(
                    [
                        upper_tri(i0 + 1, j0),
                        lower_tri(i0 + 1, j0 + 1),
                        upper_tri(i0 + 1, j0 + 1),
                        upper_tri(i0, j0 + 1),
                    ]
                )
                anchors = np.array(
                    [
                        _node(M, i0 + 2, j0),
                        _node(M, i0 + 2, j0 + 2),
                        _node(M, i0, j0 + 2),
                        _node(M, i0 + 2, j0 + 1),
                        _node(M, i0 + 1, j0 + 2),
                        _node(M, i0 + 1, j0 + 1),
                    ]
                )
                blocks.append(MacroBlock(fine, anchors, "P2"))

    return blocks


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text dump: one node per line as ``x y``, a blank line, then one
    element per line as space-separated node indices.  Debugging aid only."""
    lines = [f"{x!r} {y!r}" for x, y in mesh.nodes]
    lines.append("")
    lines.extend(" ".join(str(v) for v in el) for el in mesh.elements)
    return "\n".join(lines) + "\n"
