"""
What a semi-elasticity means in basis points and dollars
========================================================

A semi-log slope b says ln(yield) moves by b * dS when the market share
moves by dS. This script turns published-size slopes into yield changes,
counterfactual yields and interest savings.
"""

from stablecoin_tbills import (
    ImpactQuery,
    SlopeProfile,
    annual_savings,
    bps_impact,
    counterfactual_yield,
    impact_report,
)

# A tenth of a percentage point more market share in each regime, at a 4.24% yield.
for label, slope in (("low regime", -1.730), ("high regime", -6.264)):
    bps = bps_impact(ImpactQuery(slope, 0.001, 4.24))
    print(f"{label:<12} slope {slope:+.3f}: {bps:+.2f} bps")

# One full percentage point under the single-slope model at 4.16%.
linear = SlopeProfile(-3.795, -3.795)
print(f"first order: {bps_impact(ImpactQuery(-3.795, 0.01, 4.16)):+.2f} bps")

# The exact exponential is a little larger than the log approximation.
cf = counterfactual_yield(linear, actual_share=0.016, reference_share=0.006, actual_yield=4.16)
print(f"counterfactual yield {cf:.3f}% vs actual 4.16% ({100 * (cf - 4.16):.1f} bps)")

# With a threshold the path from the reference share is integrated piecewise.
kinked = SlopeProfile(-1.730, -6.264, tau=0.00973)
cf = counterfactual_yield(kinked, actual_share=0.016, reference_share=0.006, actual_yield=4.16)
print(f"piecewise counterfactual {cf:.3f}%")

# Interest savings scale linearly with the yield reduction and the stock of bills.
for bps in (24, 16):
    print(f"{bps} bps on $6.2tn: ${annual_savings(bps, 6.2e12) / 1e9:.2f}bn a year")

print()
print(impact_report(kinked, delta_share=0.006, baseline_yield=4.16, outstanding=6.2e12).format())
