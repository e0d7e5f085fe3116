"""Train once per replacement method and compare final retrieval quality.

All runs share the same initialization and step-0 fine-tuning; they
differ only in which transform the decorrelation phase applies (Orig
applies none).  The distance-preserving US replacement should come out
on top.
"""

from svdn import DecorrMethod, RriSchedule, generate_synthetic, run_decorr_comparison

data = generate_synthetic()
rows = run_decorr_comparison(data, RriSchedule())

print("method   rank-1    mAP")
best = max(rows, key=lambda r: r.map)
for row in rows:
    marker = "  <- best" if row is best else ""
    print(f"{row.method.value:<8} {row.rank1:.4f}  {row.map:.4f}{marker}")

us = next(r for r in rows if r.method is DecorrMethod.US)
print(f"\nUS margin over each competitor (mAP):")
for row in rows:
    if row.method is not DecorrMethod.US:
        print(f"  vs {row.method.value:<5}: {us.map - row.map:+.4f}")
