"""Test package for Spanoid Lab"""
