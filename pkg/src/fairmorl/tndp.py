"""Grid-city transport line design with group-wise demand rewards.

A city is an m x n grid of cells, an origin-destination (OD) flow matrix over
cell pairs, and a socioeconomic group label per cell. An episode grows a
transport line cell by cell through 8-neighbor moves; each step's reward
vector is the fraction of every group's total demand newly covered by the
line. A flow counts as covered once both its endpoints lie on the line, and
is attributed to the origin cell's group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXCLUDED = -1

# N, NE, E, SE, S, SW, W, NW
DIRECTIONS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
N_DIRECTIONS = 8


@dataclass(frozen=True)
class CityGrid:
    """Immutable city description; shareable across concurrent episodes."""

    rows: int
    cols: int
    od: np.ndarray            # (cells, cells), nonnegative, zero diagonal
    group: np.ndarray         # (cells,) int label, EXCLUDED outside the city
    n_groups: int
    group_totals: np.ndarray  # (n_groups,) total origin demand per group

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols


def build_city(rows: int, cols: int, od: np.ndarray, group: np.ndarray) -> CityGrid:
    """Validate raw arrays and derive per-group demand totals."""
    n_cells = rows * cols
    od = np.asarray(od, dtype=float)
    group = np.asarray(group, dtype=int)
    if od.shape != (n_cells, n_cells):
        raise ValueError(f"OD matrix must be {n_cells}x{n_cells}, got {od.shape}")
    if group.shape != (n_cells,):
        raise ValueError(f"group labels must have length {n_cells}, got {group.shape}")
    if np.any(od < 0) or not np.all(np.isfinite(od)):
        raise ValueError("OD entries must be finite and nonnegative")
    if np.any(np.diagonal(od) != 0):
        raise ValueError("OD matrix must have a zero diagonal")
    labels = np.unique(group[group != EXCLUDED])
    if labels.size < 2:
        raise ValueError(f"need at least 2 groups, got {labels.size}")
    if not np.array_equal(labels, np.arange(labels.size)):
        raise ValueError(f"group labels must be 0..{labels.size - 1}, got {labels.tolist()}")
    n_groups = labels.size
    totals = np.zeros(n_groups)
    row_demand = od.sum(axis=1)
    for g in range(n_groups):
        totals[g] = row_demand[group == g].sum()
    if np.any(totals <= 0):
        zero = np.nonzero(totals <= 0)[0].tolist()
        raise ValueError(f"groups {zero} have no origin demand")
    return CityGrid(rows=rows, cols=cols, od=od, group=group,
                    n_groups=n_groups, group_totals=totals)


def _parse_rows(path, n_fields: int):
    """Yield (line_number, fields) from a comma-separated file, skipping blanks."""
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != n_fields:
                raise ValueError(
                    f"{path}:{lineno}: expected {n_fields} comma-separated fields, "
                    f"got {len(fields)}")
            yield lineno, fields


def _parse_cell(path, lineno: int, text: str, n_cells: int) -> int:
    try:
        idx = int(text)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: cell index {text!r} is not an integer") from None
    if not 0 <= idx < n_cells:
        raise ValueError(f"{path}:{lineno}: cell index {idx} outside 0..{n_cells - 1}")
    return idx


def load_city(rows: int, cols: int, od_path, groups_path, mask_path=None,
              n_groups: int | None = None) -> CityGrid:
    """Load a city from CSV files.

    ``od_path`` holds (origin, destination, flow) triples; repeated pairs
    accumulate. ``groups_path`` holds (cell, value) pairs: integer group ids,
    or raw values (e.g. house prices) bucketed into ``n_groups``
    equal-frequency groups when that argument is given. Cells absent from the
    groups file, and any listed in ``mask_path``, are excluded from the city.
    """
    n_cells = rows * cols
    od = np.zeros((n_cells, n_cells))
    any_rows = False
    for lineno, fields in _parse_rows(od_path, 3):
        any_rows = True
        origin = _parse_cell(od_path, lineno, fields[0], n_cells)
        dest = _parse_cell(od_path, lineno, fields[1], n_cells)
        try:
            flow = float(fields[2])
        except ValueError:
            raise ValueError(f"{od_path}:{lineno}: flow {fields[2]!r} is not a number") from None
        if not np.isfinite(flow) or flow < 0:
            raise ValueError(f"{od_path}:{lineno}: flow must be finite and nonnegative")
        if origin == dest:
            raise ValueError(f"{od_path}:{lineno}: self-flow on cell {origin} is not allowed")
        od[origin, dest] += flow
    if not any_rows:
        raise ValueError(f"{od_path}: no OD rows found")

    cells = []
    values = []
    seen = set()
    for lineno, fields in _parse_rows(groups_path, 2):
        cell = _parse_cell(groups_path, lineno, fields[0], n_cells)
        if cell in seen:
            raise ValueError(f"{groups_path}:{lineno}: duplicate cell {cell}")
        seen.add(cell)
        try:
            values.append(float(fields[1]))
        except ValueError:
            raise ValueError(
                f"{groups_path}:{lineno}: group value {fields[1]!r} is not a number") from None
        cells.append(cell)
    if not cells:
        raise ValueError(f"{groups_path}: no group rows found")
    cells_arr = np.asarray(cells)
    values_arr = np.asarray(values)

    group = np.full(n_cells, EXCLUDED, dtype=int)
    if n_groups is not None:
        group[cells_arr] = bucketize(values_arr, n_groups)
    else:
        if np.any(values_arr != np.round(values_arr)):
            raise ValueError(
                f"{groups_path}: non-integer group ids; pass n_groups to bucket raw values")
        ids = values_arr.astype(int)
        # remap arbitrary ids (e.g. 1-based quintiles) onto 0..k-1
        uniq = np.unique(ids)
        remap = {v: i for i, v in enumerate(uniq.tolist())}
        group[cells_arr] = [remap[v] for v in ids.tolist()]

    if mask_path is not None:
        for lineno, fields in _parse_rows(mask_path, 1):
            cell = _parse_cell(mask_path, lineno, fields[0], n_cells)
            group[cell] = EXCLUDED

    return build_city(rows, cols, od, group)


def bucketize(values: np.ndarray, k: int) -> np.ndarray:
    """Assign ranks to ``k`` equal-frequency buckets (0 = lowest values)."""
    if k < 2:
        raise ValueError(f"need at least 2 buckets, got {k}")
    n = values.size
    if n < k:
        raise ValueError(f"cannot split {n} values into {k} buckets")
    order = np.argsort(values, kind="stable")
    buckets = np.empty(n, dtype=int)
    buckets[order] = (np.arange(n) * k) // n
    return buckets


def estimate_od_mobility_law(pop_density, cell_radius: float, f_min: float,
                             f_max: float, rows: int, cols: int,
                             excluded=None) -> np.ndarray:
    """Forecast OD flows from population density via an inverse-square
    distance law with visitation-frequency bounds.

    Flow into cell j from cell i is ``mu_j / (d_ij^2 * ln(f_max / f_min))``
    with ``mu_j = density_j * cell_radius^2 * f_max`` and ``d_ij`` the
    Manhattan distance in cell units. Excluded cells send and receive nothing.
    """
    if not (f_max > f_min > 0):
        raise ValueError(f"need f_max > f_min > 0, got f_min={f_min}, f_max={f_max}")
    density = np.asarray(pop_density, dtype=float)
    n_cells = rows * cols
    if density.shape != (n_cells,):
        raise ValueError(f"density must have length {n_cells}, got {density.shape}")
    if np.any(density < 0):
        raise ValueError("density must be nonnegative")
    r = np.arange(n_cells) // cols
    c = np.arange(n_cells) % cols
    dist = np.abs(r[:, None] - r[None, :]) + np.abs(c[:, None] - c[None, :])
    mu = density * cell_radius**2 * f_max
    with np.errstate(divide="ignore", invalid="ignore"):
        od = mu[None, :] / (dist.astype(float) ** 2 * np.log(f_max / f_min))
    np.fill_diagonal(od, 0.0)
    if excluded is not None:
        excluded = np.asarray(excluded, dtype=int)
        od[excluded, :] = 0.0
        od[:, excluded] = 0.0
    return od


@dataclass(frozen=True)
class EpisodeState:
    """A partially built line; advanced by one actor at a time."""

    line: tuple[int, ...]       # visited cells, no repeats, 8-neighbor chain
    steps_left: int
    satisfied: np.ndarray       # per-group covered demand, raw flow units

    @property
    def current(self) -> int:
        return self.line[-1]


def action_mask(city: CityGrid, line, allowed_directions=None) -> np.ndarray:
    """Which of the 8 directions may extend the line from its last cell."""
    mask = np.zeros(N_DIRECTIONS, dtype=bool)
    last = line[-1]
    row, col = divmod(last, city.cols)
    visited = set(line)
    for k, (dr, dc) in enumerate(DIRECTIONS):
        if allowed_directions is not None and k not in allowed_directions:
            continue
        nr, nc = row + dr, col + dc
        if not (0 <= nr < city.rows and 0 <= nc < city.cols):
            continue
        cell = nr * city.cols + nc
        if city.group[cell] == EXCLUDED or cell in visited:
            continue
        mask[k] = True
    return mask


def observe(city: CityGrid, state: EpisodeState) -> np.ndarray:
    """One-hot encoding of the line's current head cell."""
    obs = np.zeros(city.n_cells)
    obs[state.current] = 1.0
    return obs


def reset_episode(city: CityGrid, start_cell: int, episode_len: int,
                  allowed_directions=None):
    """Start a line at ``start_cell``; returns (state, observation, mask)."""
    if episode_len < 1:
        raise ValueError("episode length must be positive")
    if not 0 <= start_cell < city.n_cells or city.group[start_cell] == EXCLUDED:
        raise ValueError(f"start cell {start_cell} is excluded or out of range")
    state = EpisodeState(line=(start_cell,), steps_left=episode_len,
                         satisfied=np.zeros(city.n_groups))
    return state, observe(city, state), action_mask(city, state.line, allowed_directions)


def step_episode(state: EpisodeState, city: CityGrid, action: int,
                 allowed_directions=None):
    """Extend the line one cell; returns (state, reward, done, mask).

    The reward for group g is the newly covered demand between the new cell
    and every cell already on the line, divided by the group's total demand.
    The episode ends when the step budget runs out or no move remains.
    """
    mask = action_mask(city, state.line, allowed_directions)
    if not 0 <= action < N_DIRECTIONS or not mask[action]:
        raise ValueError(f"action {action} is not allowed from cell {state.current}")
    row, col = divmod(state.current, city.cols)
    dr, dc = DIRECTIONS[action]
    new_cell = (row + dr) * city.cols + (col + dc)

    line_arr = np.asarray(state.line)
    delta = np.zeros(city.n_groups)
    delta[city.group[new_cell]] += city.od[new_cell, line_arr].sum()
    np.add.at(delta, city.group[line_arr], city.od[line_arr, new_cell])

    new_state = EpisodeState(line=state.line + (new_cell,),
                             steps_left=state.steps_left - 1,
                             satisfied=state.satisfied + delta)
    reward = delta / city.group_totals
    new_mask = action_mask(city, new_state.line, allowed_directions)
    done = new_state.steps_left <= 0 or not new_mask.any()
    return new_state, reward, done, new_mask


def line_return(city: CityGrid, line) -> np.ndarray:
    """One-shot per-group coverage of a complete line (order independent)."""
    cells = np.asarray(line)
    if len(set(cells.tolist())) != len(cells):
        raise ValueError("line must not repeat cells")
    sub = city.od[np.ix_(cells, cells)]
    covered = np.zeros(city.n_groups)
    np.add.at(covered, city.group[cells], sub.sum(axis=1))
    return covered / city.group_totals


class TransportEnv:
    """Episodic interface over a city for the training loop."""

    n_actions = N_DIRECTIONS

    def __init__(self, city: CityGrid, start_cell: int, episode_len: int,
                 allowed_directions=None):
        self.city = city
        self.start_cell = start_cell
        self.episode_len = episode_len
        self.allowed_directions = (tuple(allowed_directions)
                                   if allowed_directions is not None else None)
        self.obs_dim = city.n_cells
        self.n_objectives = city.n_groups
        self.max_episode_len = episode_len
        self.return_scale = np.ones(city.n_groups)
        # validate the start configuration eagerly
        self._state, _, _ = reset_episode(city, start_cell, episode_len,
                                          self.allowed_directions)

    def reset(self):
        self._state, obs, mask = reset_episode(self.city, self.start_cell,
                                               self.episode_len, self.allowed_directions)
        return obs, mask

    def step(self, action: int):
        self._state, reward, done, mask = step_episode(
            self._state, self.city, action, self.allowed_directions)
        return observe(self.city, self._state), reward, done, mask
