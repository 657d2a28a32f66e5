"""End to end: threat scan + bag scan -> scored, artefacted TIP volume.

Also shows the operational rejection path: a threat too large for the bag
gets the fit penalty everywhere, scores ~0, and a --min-score gate (here
the library-side check) refuses it.
"""

import os
import time

import voltip as vt

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

threat_scan, _ = vt.generate(vt.PhantomSpec("gun-like-threat", (20, 20, 20), seed=11))
bag_scan, _ = vt.generate(vt.PhantomSpec("cluttered-bag", (40, 40, 40), seed=12))

t0 = time.time()
out = vt.run_pipeline(threat_scan, bag_scan, vt.PipelineConfig(seed=13))
elapsed = time.time() - t0

res = out.insertion
print(f"pipeline finished in {elapsed:.1f}s")
print(f"threat crop {out.threat.dims}, {res.threat_voxels} weighted voxels")
print(f"pose origin {res.pose.origin}, cost {res.cost:.2f}, score {res.score:.1f}")

path = os.path.join(OUT, "pipeline_tip.vtip")
vt.save_volume(out.tip, path)
print(f"TIP volume -> {path}")

print()
print("== rejection of an impossible insertion ==")
big_threat, _ = vt.generate(vt.PhantomSpec("cube-threat", (64, 64, 64), seed=14))
small_bag, _ = vt.generate(vt.PhantomSpec("hollow-box-bag", (24, 24, 24), seed=15))
bad = vt.run_pipeline(big_threat, small_bag, vt.PipelineConfig(seed=16))
print(f"oversized threat score: {bad.insertion.score:.1f}")
MIN_SCORE = 50.0
verdict = "rejected" if bad.insertion.score < MIN_SCORE else "accepted"
print(f"with a minimum score of {MIN_SCORE:.0f} this TIP is {verdict}")
