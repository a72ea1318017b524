"""How the per-layer frequency bands are laid out.

Shows the two regimes of the band planner: at low sampling ratios the
layers partition the one-sided spectrum exactly (deepest layer owns DC),
and at higher ratios the bands widen and overlap, sliding from the top of
the spectrum down to DC.

Run: python3 demos/01_band_plans.py
"""

from dualcast import spectral as sp


def draw(plan, cols=72):
    scale = cols / plan.bin_count
    print(
        f"  L={plan.series_len} bins={plan.bin_count} ratio={plan.ratio} "
        f"regime={plan.regime}"
    )
    for band in plan.bands:
        left = int(band.start * scale)
        width = max(1, int((band.stop - band.start) * scale))
        bar = " " * left + "#" * width
        print(f"    layer {band.layer}: [{band.start:4d}, {band.stop:4d})  {bar}")
    print()


print("partition regime: ratio at 1/N tiles the spectrum with no overlap\n")
for layers in (2, 3, 4):
    draw(sp.make_plan(layers, 1.0 / layers, 96))

print("overlap regime: wider bands share bins with their neighbours\n")
for ratio in (0.5, 0.75):
    draw(sp.make_plan(3, ratio, 96))

print("a single layer always sees the full spectrum\n")
draw(sp.make_plan(1, 0.4, 96))

plan = sp.make_plan(3, 0.75, 96)
expected = (0.75 * 3 - 1) * plan.bin_count / 2
total = 0
for hi, lo in zip(plan.bands, plan.bands[1:]):
    total += max(0, min(hi.stop, lo.stop) - max(hi.start, lo.start))
print(
    f"mean consecutive overlap at ratio 0.75: {total / 2:.1f} bins "
    f"(closed form predicts {expected:.2f})"
)
