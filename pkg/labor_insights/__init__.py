"""
labor_insights – Differentially private top-k labour-market reports.

Modules:
    noise          – seedable Laplace/Gumbel samplers and stream derivation
    mechanisms     – known/unknown-domain top-k mechanisms
    accountant     – privacy budget ledger
    ingest         – CSV loading, windowing and distinct-count histograms
    reports        – employers, jobs and skills reports
    report_writer  – CSV/JSON report files
    audit          – Monte Carlo privacy and sampler checks
"""

__version__ = "0.1.0"
