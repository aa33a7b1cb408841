"""
API routers for scheme, simulation and ledger endpoints
"""
