/* node3 */
#include <stdint.h>
#include <avr/io.h>
#include "blocks.h"
#include "com.h"
static uint16_t FanSensor_rpm_buf[1];
static double S2S_u16_double_y_buf[1];
static double SetPoint_w_buf[1];
static double pid_dollar_e_y_buf[1];
static double pid_dollar_i_y_buf[1];
static double pid_err_e_buf[1];
static double pid_ediff_d_buf[1];
static double pid_kd_v_buf[1];
static double pid_ki_i_buf[1];
static double pid_isum_s_buf[1];
static double pid_kp_p_buf[1];
static double pid_usum_u_buf[1];
static double pid_aw_keep_buf[1];
static double pid_sat_y_buf[1];
static uint8_t S2S_double_u8_y_buf[1];
int main(void)
{
    Timer2Controller_init();
    FanSensor_init();
    S2S_u16_double_init();
    SetPoint_init();
    pid_dollar_e_init();
    pid_dollar_i_init();
    pid_err_init();
    pid_ediff_init();
    pid_kd_init();
    pid_ki_init();
    pid_isum_init();
    pid_kp_init();
    pid_usum_init();
    pid_aw_init();
    pid_sat_init();
    S2S_double_u8_init();
    FanDriver_init();
    for (;;) {
        Timer2Controller_loop();
        FanSensor_loop();
        S2S_u16_double_loop();
        SetPoint_loop();
        pid_dollar_e_loop();
        pid_dollar_i_loop();
        pid_err_loop();
        pid_ediff_loop();
        pid_kd_loop();
        pid_ki_loop();
        pid_isum_loop();
        pid_kp_loop();
        pid_usum_loop();
        pid_aw_loop();
        pid_sat_loop();
        S2S_double_u8_loop();
        FanDriver_loop();
        timer_wait(); /* 63 STU */
    }
    Timer2Controller_end();
    FanSensor_end();
    S2S_u16_double_end();
    SetPoint_end();
    pid_dollar_e_end();
    pid_dollar_i_end();
    pid_err_end();
    pid_ediff_end();
    pid_kd_end();
    pid_ki_end();
    pid_isum_end();
    pid_kp_end();
    pid_usum_end();
    pid_aw_end();
    pid_sat_end();
    S2S_double_u8_end();
    FanDriver_end();
    return 0;
}
/* end of node3 */
