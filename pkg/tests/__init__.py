"""Tests package for the Scene Graph Layout Toolkit"""
