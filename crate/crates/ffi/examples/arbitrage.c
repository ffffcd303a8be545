/* Two-step arbitrage through the C API. */
#include <stdio.h>

#include "horizon.h"

int main(void) {
    const double spot[] = {10.0, 50.0};
    HzSeries *prices = NULL, *buy = NULL, *sell = NULL;
    HzBattery *battery = NULL;
    HzSchedule *schedule = NULL;
    HzMarket market = hz_market_default();
    double objective = 0.0;

    if (hz_series_new(spot, 2, 1.0, &prices) != HZ_STATUS_OK ||
        hz_split_prices(prices, &market, &buy, &sell) != HZ_STATUS_OK ||
        hz_battery_new(1.0, 1.0, 1.0, 1.0, 0.0, &battery) != HZ_STATUS_OK ||
        hz_solve_window(buy, sell, battery, &market, 0.0, &schedule) != HZ_STATUS_OK ||
        hz_schedule_objective(schedule, &objective) != HZ_STATUS_OK) {
        fprintf(stderr, "error: %s\n", hz_last_error());
        return 1;
    }
    printf("objective %.2f EUR over %zu steps\n", objective, hz_schedule_len(schedule));

    hz_schedule_free(schedule);
    hz_battery_free(battery);
    hz_series_free(sell);
    hz_series_free(buy);
    hz_series_free(prices);
    return 0;
}
