"""
Service modules: ring arithmetic, sampling, the multi-signature scheme,
wire codec, session simulator, ledger storage and the service facade
"""
