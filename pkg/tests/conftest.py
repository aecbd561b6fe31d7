import numpy as np
import pytest

from floppynet import networks


@pytest.fixture
def robot_arm():
    return networks.fixture("robot_arm")


@pytest.fixture
def molecule():
    return networks.fixture("molecule_fixture")


@pytest.fixture
def lattice_4x4():
    return networks.lattice_fixture_4x4()


@pytest.fixture
def hinged():
    return networks.hinged_fixture()


@pytest.fixture
def pinned_bar():
    return networks.build_network([(0.0, 0.0), (0.7, 0.4)], [(0, 1)],
                                  [True, False])


@pytest.fixture
def free_triangle():
    return networks.build_network([(0.0, 0.0), (1.0, 0.1), (0.4, 0.9)],
                                  [(0, 1), (1, 2), (0, 2)])


def constraint_values(network, positions):
    """Stacked constraint functions: squared-length and anchor residuals."""
    vals = []
    for e in network.edges:
        d = positions[e.a] - positions[e.b]
        vals.append(d @ d - e.rest_length ** 2)
    for node in np.flatnonzero(network.fixed):
        vals.append(positions[node, 0] - network.positions[node, 0])
        vals.append(positions[node, 1] - network.positions[node, 1])
    return np.array(vals)


def fd_jacobian(network, eps=1e-6):
    """Independent constraint Jacobian by central finite differences."""
    x0 = network.positions.copy()
    n = network.n_coords
    m = network.n_edges + 2 * int(network.fixed.sum())
    jac = np.zeros((m, n))
    for j in range(n):
        xp = x0.copy()
        xp[j // 2, j % 2] += eps
        xm = x0.copy()
        xm[j // 2, j % 2] -= eps
        jac[:, j] = (constraint_values(network, xp)
                     - constraint_values(network, xm)) / (2 * eps)
    return jac


def fd_rank(network, tol=1e-7):
    """Numeric rank of the finite-difference Jacobian."""
    jac = fd_jacobian(network)
    s = np.linalg.svd(jac, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int((s > tol * s[0]).sum())


def fd_dof(network, tol=1e-7):
    return network.n_coords - fd_rank(network, tol)
