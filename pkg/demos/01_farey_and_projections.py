"""Slopes, the Farey graph, twisting numbers, and the distance formula.

Walk through the exactly computable layer: distances and geodesics
between slopes, annular projections of marking points, and how the
thresholded sum turns projection data into a coarse metric.
"""


from coarsegeo.surfmodel import (
    INFINITY, ZERO, ModelSurface, Slope, Subsurface, base_point,
    distance_formula, farey_distance, farey_geodesic, flip_move, project,
    twist_move, twist_number,
)

print("=== the Farey graph ===")
pairs = [(ZERO, INFINITY), (Slope(1, 2), Slope(1, 3)), (ZERO, Slope(2, 5)),
         (Slope(3, 7), Slope(-8, 5))]
for a, b in pairs:
    print(f"d({a}, {b}) = {farey_distance(a, b)}   via {farey_geodesic(a, b)}")

print()
print("=== twisting numbers ===")
print("twist of 7/2 around infinity:", twist_number(INFINITY, Slope(7, 2)))
print("twist of n/1 around infinity:", [twist_number(INFINITY, Slope(n, 1))
                                        for n in range(-3, 4)])

print()
print("=== a marking point and its projections ===")
surface = ModelSurface(((1, 1), (1, 1)), flavor="marking")
x = base_point(surface)
print("base point:", x.to_json()["components"])
y = twist_move(flip_move(twist_move(x, 0, 5), 0), 0, 30)
y = twist_move(y, 1, -45)
for w in (Subsurface("component", 0), Subsurface("annulus", 0, ZERO),
          Subsurface("annulus", 1, ZERO)):
    print(f"projection of y to {w}: {project(y, w)}")

print()
print("=== the distance formula ===")
total, contributions = distance_formula(x, y)
print(f"d(x, y) = {total}")
for w, d in contributions:
    print(f"  {w} contributes {d}")
print("small differences vanish below the threshold:",
      distance_formula(x, twist_move(x, 0, 5))[0])
