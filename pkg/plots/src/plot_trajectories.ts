import { runCli } from './io.js';
import { renderTrajectoryPlot } from './trajectories.js';

process.exit(runCli(process.argv.slice(2), 'plot_trajectories', renderTrajectoryPlot));
