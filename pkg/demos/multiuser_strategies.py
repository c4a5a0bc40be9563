"""Power splitting against grouped elements for two users on opposite faces."""
from starris.core_em import SignalParams
from starris.gain_single import LinkBudget
from starris.layout import rect_layout
from starris.star_multiuser import StrategyConfig, UserSpec, evaluate_strategy

p = SignalParams.from_wavelength(0.01)
ext = (0.05, 0.05, 0.01)
users = [UserSpec.at((-0.5, 0, -0.5), ext), UserSpec.at((0.3, 0, 0.5), ext)]
noise = 10 ** (21 / 10)  # -21 dB transmit SNR

print(f"{'side':>6} " + " ".join(f"{k:>8}" for k in ("PS", "REG", "SEG")))
for side in (0.2, 0.4, 0.6):
    lay = rect_layout(side, side, 0.005, 0.005, 0.005)
    rates = [evaluate_strategy(p, LinkBudget.unity(), lay, users, StrategyConfig(k), 1.0, noise).sum_rate_bps_hz
             for k in ("PS", "REG", "SEG")]
    print(f"{side:5.1f}m " + " ".join(f"{r:8.3f}" for r in rates))
