"""Scene Graph Layout Toolkit - Backend Package"""
__version__ = "0.1.0"
