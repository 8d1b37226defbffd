"""The bundled experiment domains: tutoring, asset replacement, tickets."""

from .asset import AssetDomain, AssetReward
from .tickets import (
    PriceCsvError,
    PriceDataset,
    PriceSeries,
    SyntheticPriceConfig,
    TicketDataDomain,
    TicketReward,
    best_possible_returns,
    expand_commencements,
    load_price_csv,
    save_price_csv,
    synth_prices,
)
from .tutoring import (
    AfmBeliefReward,
    AfmSimDomain,
    BktDomain,
    TutoringReward,
)

__all__ = [
    "AssetDomain",
    "AssetReward",
    "AfmBeliefReward",
    "AfmSimDomain",
    "BktDomain",
    "TutoringReward",
    "PriceCsvError",
    "PriceDataset",
    "PriceSeries",
    "SyntheticPriceConfig",
    "TicketDataDomain",
    "TicketReward",
    "best_possible_returns",
    "expand_commencements",
    "load_price_csv",
    "save_price_csv",
    "synth_prices",
]
