"""
BIoTBound: estimation performance guarantees for blockchain-aided IoT networks under attack.
"""
__version__ = "0.1.0"
