"""Test configuration initialization"""
