"""HTTP endpoints package"""
