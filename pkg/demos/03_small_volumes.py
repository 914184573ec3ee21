"""Small-volume regions on the 2D cusp end: slices against geodesic disks."""

from cuspcmc import AmbientMetric, SliceSpec, catalogue_perturbation
from cuspcmc.isoperimetric import compare_profiles, largest_winning_volume

volumes = [0.01, 0.05, 0.1, 0.3, 0.5]

# %% Exact model: the region above a slice has boundary length equal to its volume.
for s in compare_profiles(volumes):
    disk = s.candidates.get("geodesic_disk")
    print(f"v={s.v:<5g} slice {s.candidates['slice_region'].length:.6f}  "
          f"disk {disk.length:.6f}  winner {s.best}")

# %% Perturbed end: the region above the CMC leaf of the right volume.
circle = SliceSpec.circle(64)
g = AmbientMetric(circle, catalogue_perturbation("slice_cos", circle, 5.0, 0.01))
samples = compare_profiles(volumes[:4], g)
for s in samples:
    leaf = s.candidates["cmc_leaf_region"]
    print(f"v={s.v:<5g} leaf radius {leaf.radius:.6f} length {leaf.length:.10f} H {leaf.H:.10f}")
print("largest sampled volume won by leaf regions:", largest_winning_volume(samples, "cmc_leaf_region"))
