"""vaxledger: a permissioned ledger for issuing and verifying vaccine passports.

A trusted authority registers healthcare providers and immigration officers;
providers append vaccination records to a hash-chained, Merkle-committed
ledger; officers verify travelers by ID lookup; travelers receive signed,
QR-encodable credentials that verify offline.
"""

__version__ = "0.1.0"
