from .rejection_service import estimate_rejection, in_domain, in_domain_rows

__all__ = ['estimate_rejection', 'in_domain', 'in_domain_rows']
