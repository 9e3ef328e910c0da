"""
Spectrum Sharing Simulator
Entry point: python simulate.py run --config configs/fig2.cfg --samples 100
"""
from spectrum_sim.cli import main

if __name__ == '__main__':
    main()
