"""Legacy VTK ASCII export of meshes and per-cell scalar data."""

import numpy as np

_CELL_TYPE = {2: 5, 3: 10}  # VTK_TRIANGLE, VTK_TETRA


def write_vtk(mesh, path, cell_data=None, title="rtmixed mesh"):
    """Write the mesh (and optional per-cell scalars) in legacy VTK format."""
    nv, nc, d = mesh.n_vertices, mesh.n_cells, mesh.dim
    points = mesh.vertices
    if d == 2:
        points = np.column_stack([points, np.zeros(nv)])
    lines = [
        "# vtk DataFile Version 2.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    lines += [" ".join(f"{c:.16g}" for c in p) for p in points]
    lines.append(f"CELLS {nc} {nc * (d + 2)}")
    lines += [f"{d + 1} " + " ".join(str(v) for v in cell) for cell in mesh.cells]
    lines.append(f"CELL_TYPES {nc}")
    lines += [str(_CELL_TYPE[d])] * nc
    if cell_data:
        lines.append(f"CELL_DATA {nc}")
        for name, values in cell_data.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines += [f"{v:.16g}" for v in np.asarray(values, dtype=float)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
